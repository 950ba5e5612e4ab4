"""
Export and import of portable model documents.

Documents are written as canonical JSON (sorted keys, shortest round-trip
floats), so exporting the same model twice yields identical bytes and an
imported model predicts bit-identically to the original.
"""
import json
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Type, Union
from pydantic import BaseModel, ValidationError
from core.errors import MalformedDocument, VersionMismatch, json_path
from core.files import atomic_write_text
from core.logging import get_logger
from credit_risk import CreditRiskModel
from learners import ForestModel, GbtModel, Link, LinearModel, Model, Tree
from preprocess import Pipeline
from privacy import Mode
from .document import (
    FORMAT_VERSION,
    PARAMETER_MODELS,
    BundleParameters,
    ComponentModel,
    ForestParameters,
    GbtParameters,
    LinearParameters,
    ModelKind,
    PortableModelDocument,
    TreeArrays,
)

logger = get_logger(__name__)

ExportableModel = Union[LinearModel, ForestModel, GbtModel, CreditRiskModel]
# document key -> CreditRiskModel attribute
BUNDLE_COMPONENTS = {"pd": "pd_model", "ccf": "ccf_model", "lgd_nonzero": "lgd_nonzero", "lgd_rate": "lgd_rate"}
# Needed to turn a predicted CCF into an EAD amount.
FUNDED_COLUMN = "total_funded_amount"


def _validate(
    model_cls: Type[BaseModel],
    data: Any,
    prefix: Sequence[Union[str, int]] = (),
) -> BaseModel:
    try:
        return model_cls.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise MalformedDocument(first["msg"], path=json_path(first["loc"], prefix)) from e


# ============================================
# model -> document
# ============================================

def _tree_arrays(tree: Tree) -> TreeArrays:
    return TreeArrays(
        feature=tree.feature.tolist(),
        threshold=tree.threshold.tolist(),
        left=tree.left.tolist(),
        right=tree.right.tolist(),
        value=tree.value.tolist(),
    )


def _component(model: Model) -> Tuple[ModelKind, BaseModel]:
    if isinstance(model, LinearModel):
        kind = ModelKind.LOGISTIC if model.link is Link.LOGIT else ModelKind.LINEAR
        return kind, LinearParameters(weights=model.weights.tolist(), intercept=model.intercept, link=model.link)
    if isinstance(model, ForestModel):
        return ModelKind.FOREST, ForestParameters(
            n_features=model.n_features, trees=[_tree_arrays(t) for t in model.trees]
        )
    if isinstance(model, GbtModel):
        return ModelKind.GBT, GbtParameters(
            n_features=model.n_features,
            base_score=model.base_score,
            learning_rate=model.learning_rate,
            trees=[_tree_arrays(t) for t in model.trees],
        )
    raise TypeError(f"cannot export model of type {type(model).__name__}")


def model_to_document(
    model: ExportableModel,
    pipeline: Optional[Pipeline] = None,
    column_names: Optional[Sequence[str]] = None,
    metadata: Optional[Mapping[str, Any]] = None,
) -> PortableModelDocument:
    """
    Describe a trained model (or a credit-risk bundle) as a document.

    Args:
        model: LinearModel, ForestModel, GbtModel or CreditRiskModel
        pipeline: Fitted pipeline for single models (bundles carry their own)
        column_names: Feature names for a single model without a pipeline
        metadata: Extra metadata merged over the model's own

    Returns:
        PortableModelDocument
    """
    meta: Dict[str, Any] = {}
    if isinstance(model, CreditRiskModel):
        pipeline = model.pipeline
        meta.update(model.metadata)
        meta.setdefault("trained_mode", model.mode.value)
        components = {}
        for name, attribute in BUNDLE_COMPONENTS.items():
            kind, params = _component(getattr(model, attribute))
            components[name] = ComponentModel(model_kind=kind, parameters=params.model_dump(mode="json"))
        kind, params = ModelKind.CREDIT_RISK_BUNDLE, BundleParameters(**components)
    else:
        kind, params = _component(model)

    if pipeline is not None:
        names = list(pipeline.column_names)
        inputs = list(pipeline.input_columns)
        if kind is ModelKind.CREDIT_RISK_BUNDLE and FUNDED_COLUMN not in inputs:
            inputs.append(FUNDED_COLUMN)
        pipeline_data = pipeline.to_dict()
        meta.setdefault("trained_mode", pipeline.mode.value)
    else:
        width = getattr(model, "n_features")
        names = list(column_names) if column_names is not None else [f"x{i}" for i in range(width)]
        inputs = list(names)
        pipeline_data = None
    meta.update(metadata or {})

    return _validate(PortableModelDocument, {
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "column_names": names,
        "input_columns": inputs,
        "parameters": params.model_dump(mode="json"),
        "pipeline": pipeline_data,
        "metadata": meta,
    })


def document_to_json(document: PortableModelDocument) -> str:
    """Canonical JSON text of a document."""
    return json.dumps(document.model_dump(mode="json"), indent=2, sort_keys=True, allow_nan=False) + "\n"


def export_model(
    model: ExportableModel,
    path: Union[str, Path],
    pipeline: Optional[Pipeline] = None,
    column_names: Optional[Sequence[str]] = None,
    metadata: Optional[Mapping[str, Any]] = None,
) -> PortableModelDocument:
    """
    Write a model as a portable document.

    The document holds model parameters, the fitted pipeline and metadata
    (mode, seed, privacy ledger summary) but no training records.

    Returns:
        The written document
    """
    document = model_to_document(model, pipeline=pipeline, column_names=column_names, metadata=metadata)
    target = atomic_write_text(path, document_to_json(document))
    logger.info("Exported model", path=str(target), kind=document.model_kind.value)
    return document


# ============================================
# document -> model
# ============================================

def parse_document(data: Any) -> PortableModelDocument:
    """
    Validate decoded JSON as a document.

    Raises:
        VersionMismatch: format_version is present but unsupported
        MalformedDocument: anything else fails validation
    """
    if not isinstance(data, dict):
        raise MalformedDocument("document must be a JSON object")
    version = data.get("format_version")
    if version is not None and version != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported format_version {version!r}; expected {FORMAT_VERSION!r}")
    document = _validate(PortableModelDocument, data)
    parameters = _validate(PARAMETER_MODELS[document.model_kind], document.parameters, ("parameters",))
    if isinstance(parameters, BundleParameters):
        for name in BUNDLE_COMPONENTS:
            component: ComponentModel = getattr(parameters, name)
            if component.model_kind is ModelKind.CREDIT_RISK_BUNDLE:
                raise MalformedDocument("bundles cannot nest", path=json_path(("parameters", name, "model_kind")))
            _validate(PARAMETER_MODELS[component.model_kind], component.parameters, ("parameters", name, "parameters"))
    if document.model_kind is ModelKind.CREDIT_RISK_BUNDLE and document.pipeline is None:
        raise MalformedDocument("a credit-risk bundle needs its pipeline", path="$.pipeline")
    return document


def load_document(path: Union[str, Path]) -> PortableModelDocument:
    """Read and validate a document file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"invalid JSON: {e.msg} at line {e.lineno}") from e
    except UnicodeDecodeError as e:
        raise MalformedDocument(f"document is not UTF-8 text (byte {e.start})") from e
    return parse_document(data)


def _tree(arrays: TreeArrays) -> Tree:
    return Tree(
        feature=arrays.feature,
        threshold=arrays.threshold,
        left=arrays.left,
        right=arrays.right,
        value=arrays.value,
    )


def _single_model(kind: ModelKind, parameters: Mapping[str, Any]) -> Model:
    params = PARAMETER_MODELS[kind].model_validate(parameters)
    if isinstance(params, LinearParameters):
        return LinearModel(weights=params.weights, intercept=params.intercept, link=params.link)
    if isinstance(params, ForestParameters):
        return ForestModel(trees=[_tree(t) for t in params.trees], n_features=params.n_features)
    return GbtModel(
        base_score=params.base_score,
        trees=[_tree(t) for t in params.trees],
        learning_rate=params.learning_rate,
        n_features=params.n_features,
    )


def document_pipeline(document: PortableModelDocument) -> Optional[Pipeline]:
    if document.pipeline is None:
        return None
    return Pipeline.from_dict(document.pipeline.model_dump(mode="json"))


def model_from_document(document: PortableModelDocument) -> ExportableModel:
    """Rebuild the model object described by a validated document."""
    if document.model_kind is not ModelKind.CREDIT_RISK_BUNDLE:
        return _single_model(document.model_kind, document.parameters)
    bundle = BundleParameters.model_validate(document.parameters)
    models: Dict[str, Model] = {
        attribute: _single_model(getattr(bundle, name).model_kind, getattr(bundle, name).parameters)
        for name, attribute in BUNDLE_COMPONENTS.items()
    }
    return CreditRiskModel(
        pipeline=document_pipeline(document),
        mode=Mode(document.metadata.get("trained_mode", Mode.EXACT.value)),
        metadata=dict(document.metadata),
        **models,
    )


def import_model(path: Union[str, Path]) -> ExportableModel:
    """Load a document file and rebuild its model."""
    document = load_document(path)
    model = model_from_document(document)
    logger.info("Imported model", path=str(path), kind=document.model_kind.value)
    return model
