# Integration tests for Privacy Summarizer
