"""Simulator and analysis toolkit for an on-chip polarization-entangled
photon-pair source.

Subpackage layout:

* ``polarization`` -- Jones calculus and two-photon density-matrix algebra
* ``device``       -- chip model: element chain, pair weights, emitted state
* ``fwm``          -- four-wave-mixing efficiency and conversion spectra
* ``detection``    -- gated single-photon counting statistics
* ``tomography``   -- linear and maximum-likelihood state reconstruction
* ``metrics``      -- entanglement and state-quality figures of merit
* ``scenario``     -- config schema, bundled presets, provenance
* ``cli``          -- command-line front end (state | counts | tomo | fwm |
  fringe | sweep)
"""

__version__ = "0.1.0"
