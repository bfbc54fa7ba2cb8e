"""Long-running reproduction drivers."""
