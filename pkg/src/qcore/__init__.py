"""Dense complex linear algebra for small composite Hilbert spaces"""
