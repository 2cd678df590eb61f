"""TTP / RSU / vehicle revocation protocol over framed request-response links."""

from .messages import (
    Ack,
    AdminRequest,
    DeltaMessage,
    ErrorCode,
    ErrorMessage,
    MsgType,
    NotRevokedStatement,
    QueryMessage,
    QueryResponse,
    SnapshotMessage,
    SnapshotRequest,
    Status,
    decode_frame,
    encode_frame,
)
from .nodes import (
    DISTRUST,
    NOT_REVOKED,
    REVOKED,
    ManualClock,
    QueryResult,
    RemoteError,
    RsuNode,
    SystemClock,
    TtpNode,
    VehicleClient,
    call,
)
from .transport import FrameServer, LocalLink, TcpLink

__all__ = [
    "Ack", "AdminRequest", "DeltaMessage", "ErrorCode", "ErrorMessage", "MsgType",
    "NotRevokedStatement", "QueryMessage", "QueryResponse", "SnapshotMessage",
    "SnapshotRequest", "Status", "decode_frame", "encode_frame",
    "DISTRUST", "NOT_REVOKED", "REVOKED", "ManualClock", "QueryResult", "RemoteError",
    "RsuNode", "SystemClock", "TtpNode", "VehicleClient", "call",
    "FrameServer", "LocalLink", "TcpLink",
]
