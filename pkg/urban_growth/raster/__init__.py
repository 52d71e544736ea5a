# Raster Module
