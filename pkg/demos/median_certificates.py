"""Certify one median over five votes under each threat model.

Five submodels predict 2..6 and the prediction must stay at most 5.4.
"""
from certreg import (VoteSet, WeightedVoteSet, cert_insert_delete, cert_swap,
                     cert_weighted_swap, fit_neighbor_model, cert_knn)
from certreg.oracle import oracle_insert_delete, oracle_swap

votes = VoteSet([2, 3, 4, 5, 6], 5.4)
print("swap           R =", cert_swap(votes).R, " brute force:", oracle_swap(votes).optimal_R)
print("insert/delete  R =", cert_insert_delete(votes).R,
      " brute force:", oracle_insert_delete(votes).optimal_R)
# submodels that need several modifications each to flip
weighted = WeightedVoteSet(votes, [3, 4, 5, 6, 7])
print("weighted swap  R =", cert_weighted_swap(weighted).R)

# the same votes as the five nearest neighbours of a query
X = [[0.1, 0.0], [0.0, 0.2], [-0.2, 0.1], [0.2, -0.2], [-0.1, -0.3], [3.0, 3.0], [-3.0, 3.0]]
y = [2, 3, 4, 5, 6, 9, 9]
model = fit_neighbor_model(X, y, k=5)
print("5-NN           R =", cert_knn(model, [0.0, 0.0], 5.4).R)
