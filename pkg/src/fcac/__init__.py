"""Privacy-preserving continual federated clustering toolkit.

The working surface, shortest path first:

- ``FCAC``: the federated model.  Construct with a client count, a
  privacy budget, and a seed; call ``fit_round`` once per batch of
  per-client data; read predictions off the server side.
- ``ArtClusterer``: the underlying single-machine continual clusterer,
  in three variants (``VARIANTS``).
- ``cmd_privacy_sweep`` / ``cmd_continual`` / ``cmd_benchmark``: the
  experiment drivers behind the ``fcac`` command line.

Everything below those is building blocks: dataset helpers, the local
noise mechanism, and clustering metrics.
"""

from fcac.clusterer import (
    CA_PLUS,
    CAE,
    CAE_FC,
    VARIANTS,
    ArtClusterer,
    ClusterLabeling,
)
from fcac.data import (
    LabeledDataset,
    gen_gaussian_mixture,
    load_csv,
    minmax_scale,
    split_dirichlet,
    split_iid,
)
from fcac.experiments import (
    ExperimentConfig,
    cmd_benchmark,
    cmd_continual,
    cmd_privacy_sweep,
    load_config,
    validate_report,
)
from fcac.federation import (
    FCAC,
    ClientResult,
    FederationConfig,
    fcac_round,
    run_client,
    run_server,
    sort_nodes,
)
from fcac.metrics import (
    ami,
    ari,
    count_clusters,
    nmi,
    wasserstein1,
    wasserstein1_marginal,
)
from fcac.privacy import (
    PrivacyParams,
    laplace_icdf,
    local_sensitivity,
    privatize_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "ArtClusterer",
    "CA_PLUS",
    "CAE",
    "CAE_FC",
    "ClientResult",
    "ClusterLabeling",
    "ExperimentConfig",
    "FCAC",
    "FederationConfig",
    "LabeledDataset",
    "PrivacyParams",
    "VARIANTS",
    "ami",
    "ari",
    "cmd_benchmark",
    "cmd_continual",
    "cmd_privacy_sweep",
    "count_clusters",
    "fcac_round",
    "gen_gaussian_mixture",
    "laplace_icdf",
    "load_config",
    "load_csv",
    "local_sensitivity",
    "minmax_scale",
    "nmi",
    "privatize_dataset",
    "run_client",
    "run_server",
    "sort_nodes",
    "split_dirichlet",
    "split_iid",
    "validate_report",
    "wasserstein1",
    "wasserstein1_marginal",
]
