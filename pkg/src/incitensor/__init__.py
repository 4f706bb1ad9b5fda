"""Equivariant linear maps on incidence tensors of graphs, simplicial
complexes and polytopes."""

from .equimap import (
    EquivariantMap,
    PoolBroadcastTerm,
    Signature,
    apply_layer,
    apply_map,
    apply_masked,
    apply_relaxed,
    apply_term,
    broadcast,
    enumerate_terms,
    pool,
    symmetrize_map,
    tau,
    tau_symmetric,
    total_parameters,
)
from .errors import IncitensorError
from .faces import enumerate_faces, face_to_index, index_to_face, permute_face
from .tensors import (
    ConstraintSet,
    Dim,
    FaceVector,
    IncidenceTensor,
    decompose,
    densify,
    enumerate_valid_partitions,
    multiplicity,
    permute_tensor,
    reassemble,
)

__version__ = "0.1.0"
