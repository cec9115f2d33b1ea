# Privacy Summarizer Test Suite
