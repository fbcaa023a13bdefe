from audio_io.clip import AudioClip, SourceSet, mix_sources, require_same_layout, zeros_like
from audio_io.synth import SourceSpec, SynthRecipe, default_recipe, synth_source_set
from audio_io.wav import WavWriteInfo, load_source_set, read_wav, write_source_set, write_wav

__all__ = [
    "AudioClip",
    "SourceSet",
    "SourceSpec",
    "SynthRecipe",
    "WavWriteInfo",
    "default_recipe",
    "load_source_set",
    "mix_sources",
    "read_wav",
    "require_same_layout",
    "synth_source_set",
    "write_source_set",
    "write_wav",
    "zeros_like",
]
