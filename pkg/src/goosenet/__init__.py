"""IEC 61850 GOOSE/SV frame codec, station-bus simulator and delay analyzer."""

__version__ = "0.1.0"
