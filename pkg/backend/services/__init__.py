# Service modules
