# Test package for the hard-phase frame evolution code
