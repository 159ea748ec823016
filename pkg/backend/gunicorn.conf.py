import os

bind = f"0.0.0.0:{os.environ.get('PORT', 8000)}"
# type registries and partition caches are per process
workers = int(os.environ.get("WEB_CONCURRENCY", 2))
worker_class = "uvicorn.workers.UvicornWorker"
# exhaustive sweeps can run long
timeout = 600
keepalive = 5
max_requests = 200
max_requests_jitter = 20
