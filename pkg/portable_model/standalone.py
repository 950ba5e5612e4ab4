"""
Scoring from a document alone.

Only the document and a features CSV are needed: no accountant is created
and no random stream is drawn.
"""
from pathlib import Path
from typing import Union
import pandas as pd
from core.errors import SchemaMismatch
from core.files import atomic_write_text
from core.logging import get_logger
from credit_risk import CreditRiskModel, loss_frame, score_matrix
from learners import predict
from loans import dollars_to_cents, read_raw_csv, require_columns
from preprocess import coerce_frame
from .codec import FUNDED_COLUMN, document_pipeline, load_document, model_from_document
from .document import PortableModelDocument

logger = get_logger(__name__)


def _funded_cents(frame: pd.DataFrame) -> list:
    cents = []
    for row_number, text in enumerate(frame[FUNDED_COLUMN].tolist(), start=1):
        try:
            cents.append(dollars_to_cents(str(text).strip()))
        except (ValueError, ArithmeticError) as e:
            raise SchemaMismatch(
                f"row {row_number}: cannot parse '{text}' as an amount", column=FUNDED_COLUMN
            ) from e
    return cents


def standalone_predict(
    document: Union[PortableModelDocument, str, Path],
    features_csv: Union[str, Path],
    output_csv: Union[str, Path],
) -> Path:
    """
    Score a features CSV with a portable model.

    Bundles write member_id,pd,ead,lgd,expected_loss; single models write
    member_id (when present) and prediction.

    Args:
        document: Document or path to one
        features_csv: CSV whose columns include the document's input_columns
        output_csv: Destination

    Returns:
        Output path
    """
    if not isinstance(document, PortableModelDocument):
        document = load_document(document)
    frame = read_raw_csv(features_csv)
    require_columns(frame, document.input_columns)

    model = model_from_document(document)
    pipeline = document_pipeline(document)
    if isinstance(model, CreditRiskModel):
        matrix = pipeline.transform_frame(frame)
        output = loss_frame(score_matrix(model, matrix, _funded_cents(frame)))
    else:
        if pipeline is not None:
            rows = pipeline.transform_frame(frame)
        else:
            rows = coerce_frame(frame[document.column_names], document.column_names).to_numpy(dtype=float)
        predictions = predict(model, rows)
        output = pd.DataFrame({"prediction": [repr(float(p)) for p in predictions]})
        if "member_id" in frame.columns:
            output.insert(0, "member_id", frame["member_id"].tolist())

    target = atomic_write_text(output_csv, output.to_csv(index=False, lineterminator="\n"))
    logger.info("Scored features", path=str(target), rows=len(output), kind=document.model_kind.value)
    return target
