"""Message authentication for transfer messages.

Any object with ``sign(key, payload)`` and ``verify(key, payload, tag)`` can be
plugged in; the default is HMAC-SHA256 over canonical JSON bytes.
"""

import hashlib
import hmac
import json


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def digest(obj) -> str:
    data = obj if isinstance(obj, bytes) else canonical(obj)
    return hashlib.sha256(data).hexdigest()


def sign(key: bytes, payload: bytes) -> str:
    return hmac.new(key, payload, hashlib.sha256).hexdigest()


def verify(key: bytes, payload: bytes, signature: str) -> bool:
    return hmac.compare_digest(sign(key, payload), str(signature))


class HmacScheme:
    sign = staticmethod(sign)
    verify = staticmethod(verify)
