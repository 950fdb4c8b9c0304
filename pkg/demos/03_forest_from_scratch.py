"""The Random Forest, piece by piece."""
import numpy as np

from llmconfound import ForestParams, best_split, fit, gini, grow_tree, predict, predict_proba
from llmconfound.random_forest import tree_stream

print("gini([1,1,0]) =", gini([1, 1, 0]))

# candidate thresholds are midpoints between consecutive distinct values
print(best_split([[1], [2], [3], [4]], [0, 0, 1, 1], feature_subset=[0]))

tree = grow_tree([[1], [2], [3], [4]], [0, 0, 1, 1], ForestParams(), tree_stream(seed=0, tree_index=0))
print(tree)

rng = np.random.default_rng(0)
X = rng.uniform(0, 1, size=(100, 2))
y = (X[:, 0] > 0.5).astype(int)

forest = fit(X, y, ForestParams(n_trees=100, seed=42))
print("training accuracy:", np.mean(predict(forest, X) == y))
print("P(cancer) for [0.9, 0.1]:", predict_proba(forest, [0.9, 0.1]))

# each tree has its own stream derived from (seed, tree index):
# thread count does not change the forest
assert fit(X, y, ForestParams(n_trees=20, seed=1), n_jobs=4) == fit(X, y, ForestParams(n_trees=20, seed=1))

print(forest.to_json()[:160], "...")
