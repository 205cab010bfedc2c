"""Placement attacks on decentralized federated learning, at desk scale.

Subpackages by concern: `graphs` (topologies and metrics), `placement`
(adversary selection strategies), `learning` (task, model, poisoning),
`simulation` (the consensus training engine), `metrics` (attack impact),
`theory` (lower-bound verification, runtime probe), `config`/`sweep`/
`plots`/`cli` (experiment plumbing).
"""

__version__ = "0.1.0"
