"""
Batch front end: session runs, detection sweeps and the worked-example replay
"""
