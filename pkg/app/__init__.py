# Concurrent graph job scheduler: app package
