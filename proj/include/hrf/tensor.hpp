#pragma once

// Pointwise tensor algebra on TensorFields.

#include <vector>

#include "hrf/grid.hpp"

namespace hrf {

/// out[A∖sa, B∖sb] = Σ_m A[..m@sa..]·B[..m@sb..].
TensorField contract(const TensorField& a, int sa, const TensorField& b, int sb);
/// Pointwise product A ⊗ B (slots of A then B).
TensorField outer(const TensorField& a, const TensorField& b);
/// Σ_m A[..m@s1..m@s2..].
TensorField trace(const TensorField& a, int s1, int s2);
/// Output slot k is input slot perm[k].
TensorField permute(const TensorField& a, const std::vector<int>& perm);
/// Σ g^{p q̄} A[..p@s..q̄@sbar..], for a Lo slot s and a LoBar slot sbar.
TensorField metric_trace(const TensorField& a, int s, int sbar, const TensorField& ginv);
/// Lowers slot s (Up or UpBar) with g, keeping its position.
TensorField lower(const TensorField& a, int s, const TensorField& g);
/// Raises slot s (Lo or LoBar) with g⁻¹, keeping its position.
TensorField raise(const TensorField& a, int s, const TensorField& ginv);
/// Component index helpers (row-major, n values per slot).
int component(int n, const std::vector<int>& idx);
std::vector<int> multi_index(int n, int rank, int comp);

}  // namespace hrf
