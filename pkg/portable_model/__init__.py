"""Self-contained JSON documents for trained models and bundles."""
from .document import (
    FILE_SUFFIX,
    FORMAT_VERSION,
    ModelKind,
    PipelineDocument,
    PortableModelDocument,
    TreeArrays,
)
from .codec import (
    document_pipeline,
    document_to_json,
    export_model,
    import_model,
    json_path,
    load_document,
    model_from_document,
    model_to_document,
    parse_document,
)
from .standalone import standalone_predict

__all__ = [
    "FILE_SUFFIX",
    "FORMAT_VERSION",
    "ModelKind",
    "PipelineDocument",
    "PortableModelDocument",
    "TreeArrays",
    "document_pipeline",
    "document_to_json",
    "export_model",
    "import_model",
    "json_path",
    "load_document",
    "model_from_document",
    "model_to_document",
    "parse_document",
    "standalone_predict",
]
