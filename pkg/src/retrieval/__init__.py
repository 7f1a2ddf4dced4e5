"""Block embedding, exact cosine search and tf-idf query construction."""
