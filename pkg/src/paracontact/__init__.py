"""Verification engine for three-dimensional paracontact metric geometry."""
