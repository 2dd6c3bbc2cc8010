"""LLM stage: prompt rendering, providers, response parsing and alignment."""

from .alignment import align_predictions
from .parsing import TermPrediction, extract_json_array, parse_response, parse_response_with_issues
from .prompt import PromptConfig, Shots, build_prompt, bundled_example, bundled_template
from .providers import Completion, LlmProvider, LlmRequest, MockProvider, RemoteProvider, complete

__all__ = [
    "Completion",
    "LlmProvider",
    "LlmRequest",
    "MockProvider",
    "PromptConfig",
    "RemoteProvider",
    "Shots",
    "TermPrediction",
    "align_predictions",
    "build_prompt",
    "bundled_example",
    "bundled_template",
    "complete",
    "extract_json_array",
    "parse_response",
    "parse_response_with_issues",
]
