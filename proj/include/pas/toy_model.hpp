#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "pas/checkpoint.hpp"
#include "pas/psychometrics.hpp"

namespace pas {

struct ToyGroundTruth {
  TraitProfile persona;
  /// Trait-band heads only; unit norm in double precision.
  std::map<HeadLocator, std::vector<double>> planted;
  std::map<HeadLocator, TraitDimension> band_trait;
  std::vector<HeadLocator> copy_heads;
  /// Keyed-score shift per unit of summed (sigma * alpha * cos) over a trait's band heads.
  double agreement_gain = 1.0;
};

struct ToyModel {
  Checkpoint checkpoint;
  ToyGroundTruth truth;
};

/// Config with the given shape and the toy's fixed sequence/MLP sizes; the
/// vocabulary size is filled in by build_toy_persona_lm.
ModelConfig toy_config(int n_layers, int n_heads, int head_dim);

/// Builds (does not train) a transformer whose multiple-choice answers follow
/// `persona`:
///   layer 0     copy heads move the statement's (trait, keying) marker to
///               later positions; the MLP forms suffix x keying per trait.
///   layers 1..  trait-band heads read that product at a Yes/No token and
///               emit it along a planted unit direction; their out-projection
///               writes the direction's component into the trait's level
///               channel, which the last MLP gates by the marker into a
///               response-scale agreement read by the option unembedding.
/// Every head above layer 0 is a band head (traits round-robin). Layer-0
/// heads past the copy heads get small seeded random weights confined to
/// channels the readout ignores. Requires L >= 2, H >= 4, (L-1)*H >= 5 and
/// room for the structured channels; otherwise ConfigError.
ToyModel build_toy_persona_lm(const TraitProfile& persona, ModelConfig config, std::uint64_t seed);

/// Option nearest the keyed target implied by `persona` (ties to the
/// more-accurate option); what the toy model answers unsteered.
LikertOption toy_expected_option(const TraitProfile& persona, TraitDimension trait, Keying keying);

}  // namespace pas
