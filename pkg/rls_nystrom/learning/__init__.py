"""Learning tasks on top of the approximation: ridge regression, k-means and PCA."""
