"""Learning manipulation skills from one video demonstration via a perceptual reward."""

__version__ = "0.1.0"
