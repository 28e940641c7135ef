"""Classical classifiers trained on CNN features (scikit-learn estimator API)."""

from hybridcnn.classifiers.base import BinaryClassifier
from hybridcnn.classifiers.forest import DecisionTree, RandomForestClassifier
from hybridcnn.classifiers.hinge import LinearHingeClassifier
from hybridcnn.classifiers.knn import KNeighborsClassifier

CLASSIFIERS: dict[str, type[BinaryClassifier]] = {
    RandomForestClassifier.kind: RandomForestClassifier,
    KNeighborsClassifier.kind: KNeighborsClassifier,
    LinearHingeClassifier.kind: LinearHingeClassifier,
}

__all__ = [
    "BinaryClassifier",
    "DecisionTree",
    "RandomForestClassifier",
    "KNeighborsClassifier",
    "LinearHingeClassifier",
    "CLASSIFIERS",
]
