"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class AlignEvalError(Exception):
    """Base class for every error raised by this package."""


# TextGrid


class TextGridError(AlignEvalError, ValueError):
    """Any failure to read a TextGrid."""


class MalformedHeader(TextGridError):
    pass


class MalformedTextGrid(TextGridError):
    """Token stream ended early or held a value of the wrong kind."""


class EncodingError(TextGridError):
    pass


class NonContiguousTier(TextGridError):
    def __init__(self, tier: str, index: int, gap: float):
        self.tier = tier
        self.index = index
        self.gap = gap
        kind = "gap" if gap > 0 else "overlap"
        super().__init__(
            f"tier {tier!r}: {kind} of {abs(gap):.6g} s before interval {index}"
        )


class InvalidInterval(TextGridError):
    """Zero-length or reversed interval."""


# audio


class AudioError(AlignEvalError, ValueError):
    pass


class NotRiff(AudioError):
    pass


class TruncatedFile(AudioError):
    pass


class UnsupportedCodec(AudioError):
    pass


class OutOfRange(AudioError):
    pass


# corpus / g2p / inventory


class InvalidPattern(AlignEvalError, ValueError):
    pass


class UnknownPhone(AlignEvalError, KeyError):
    def __init__(self, phone: str, context: str = ""):
        self.phone = phone
        self.context = context
        msg = f"phone {phone!r} has no natural class"
        if context:
            msg += f" ({context})"
        super().__init__(msg)

    def __str__(self) -> str:
        return self.args[0]


class InvalidClassMap(AlignEvalError, ValueError):
    pass


class InvalidRuleSet(AlignEvalError, ValueError):
    pass


# evaluation


class EmptyTier(AlignEvalError, ValueError):
    pass


class UnsupportedTier(AlignEvalError, TypeError):
    """Point tiers are retained by the parser but cannot be evaluated."""


# formants


class FormantError(AlignEvalError, ValueError):
    pass


class DegenerateFrame(FormantError):
    pass


class RootFindingFailure(FormantError):
    pass


class TooShort(FormantError):
    pass


class NoVoicedFrames(FormantError):
    pass


# report


class ShapeMismatch(AlignEvalError, ValueError):
    pass


class ConfigError(AlignEvalError):
    """Bad run configuration; the CLI maps this to exit status 2."""
