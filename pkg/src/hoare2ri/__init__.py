"""Annotated while programs, LCTRSs and rewriting induction: validate a
Hoare-logic proof tableau, translate it into an RI inference sequence and
certify termination of the generated rewrite system."""

__version__ = "0.1.0"
