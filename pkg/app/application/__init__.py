# Application layer - geometry, measures, walks, statistics and command services
