from migrations.schema_versioner import SchemaVersioner

__all__ = ['SchemaVersioner']
