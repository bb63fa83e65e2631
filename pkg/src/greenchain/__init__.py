"""Joint function placement and routing for energy saving in partial-SDN / hybrid-NFV networks."""

__version__ = "0.1.0"
