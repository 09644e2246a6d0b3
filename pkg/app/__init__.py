# specrad - random matrix products: spectral radius versus norm
