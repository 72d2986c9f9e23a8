# LPCR Shield - Utilities
