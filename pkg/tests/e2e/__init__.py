# E2E tests: command-line runs and desk-scale acceptance checks
