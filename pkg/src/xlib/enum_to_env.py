from src.common.exceptions import ValidationError


def enum_to_env(enum_cls, value):
    for x in enum_cls:
        if x.value == value or x is value:
            return x
    allowed = ", ".join(x.value for x in enum_cls)
    raise ValidationError(
        f"Value {value!r} could not be found in {enum_cls.__name__} (allowed: {allowed})",
    )
