"""Point values, CPI comparison and disability-percentage distributions."""
