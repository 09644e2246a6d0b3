# Infrastructure layer - random streams, worker pool, artifact files
