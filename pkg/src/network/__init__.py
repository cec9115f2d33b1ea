"""Three-phase network models, nominal load states and bundled cases."""
