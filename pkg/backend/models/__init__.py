# Model modules
