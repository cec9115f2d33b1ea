# Unit tests for Privacy Summarizer
