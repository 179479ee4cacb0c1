from .templates import DeviceTemplate, ItemSlot, default_templates
from .values import generate_value
from .render import SynthSample, render_sample
from .transform import transform_sample
from .dataset import SynthConfig, generate_samples, synthesize

__all__ = [
    "DeviceTemplate",
    "ItemSlot",
    "default_templates",
    "generate_value",
    "SynthSample",
    "render_sample",
    "transform_sample",
    "SynthConfig",
    "generate_samples",
    "synthesize",
]
