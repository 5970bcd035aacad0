"""Road-defect toolkit: pothole segmentation, geotagging, and repair reporting.

The package is organized around the processing chain of a municipal survey:

* :mod:`potholemap.raster`   -- image containers, luminance, level thresholding
* :mod:`potholemap.edges`    -- Canny and zero-cross edge detectors
* :mod:`potholemap.morph`    -- disk structuring elements, closing, hole filling,
  component labeling, overlays
* :mod:`potholemap.segment`  -- the end-to-end segmentation pipeline with
  detector fallback, plus area/volume/material metrics
* :mod:`potholemap.geodata`  -- EXIF GPS extraction, sector geometry, KML export
* :mod:`potholemap.catalog`  -- survey record ingestion and persistence
* :mod:`potholemap.report`   -- size bins, category matrix, SLA and priority stats
* :mod:`potholemap.charts`   -- chart rendering for the report outputs
* :mod:`potholemap.cli`      -- the ``potholemap`` command-line tool
"""

__version__ = "0.1.0"
