"""Wire formats: result records, validated JSON inputs and protocol helpers."""
