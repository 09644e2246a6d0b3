# Interfaces layer - command line
