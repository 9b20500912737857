"""
Lab module: experiment runner, Monte Carlo oracles, self-check and reports.
"""
