import numpy as np
import orjson
from pydantic import BaseModel

from craftforecast.common import Map


def custom_serializer(obj: object) -> object:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, np.ndarray):
        # tolist gives python floats, which orjson writes in shortest round-trip form
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"Type {type(obj)} not serializable")


def dumps(obj: object, pretty=False) -> str:
    return dumpb(obj, pretty).decode()


def dumpb(obj: object, pretty=False) -> bytes:
    kwargs = {}
    if pretty:
        kwargs["option"] = orjson.OPT_INDENT_2
    return orjson.dumps(obj, default=custom_serializer, **kwargs)


def loads(str: str | bytes) -> Map:
    return orjson.loads(str)
