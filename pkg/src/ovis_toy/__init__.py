"""Toy-scale structured visual embeddings: probabilistic visual tokens, a
learnable visual embedding table, multimodal sequence assembly and staged
training, all on a hand-rolled reverse-mode tensor core."""

__version__ = "0.1.0"
