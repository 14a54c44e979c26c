__all__ = ['export_data', 'ingest_interactions', 'load_data', 'synthetic']
