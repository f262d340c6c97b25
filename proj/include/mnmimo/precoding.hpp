#pragma once

#include <algorithm>
#include <cstddef>
#include <string_view>
#include <vector>

#include "mnmimo/numerology.hpp"
#include "mnmimo/resampling.hpp"
#include "mnmimo/types.hpp"

namespace mnmimo {

enum class PrecoderMethod { CB, SLNR };

std::string_view to_string(PrecoderMethod m);
PrecoderMethod parse_precoder_method(std::string_view text);

enum class Normalization {
    UnitColumn, // every user column has unit norm
    None,       // raw formula output
};

/// Frequency responses of every user, each on its own group's grid.
/// users[t][u] is (used_subcarriers_t x M); row j is h_{u,t,j}.
struct UserGroupChannels {
    std::vector<std::vector<CMatrix>> users;

    std::size_t num_groups() const noexcept { return users.size(); }
    std::size_t num_users(std::size_t t) const { return users.at(t).size(); }
    std::size_t total_users() const noexcept;
    std::size_t num_antennas() const;
    std::size_t used_subcarriers(std::size_t t) const;
    /// Position of (t, u) in the stacked ordering: groups ascending, users ascending.
    std::size_t stacked_index(std::size_t t, std::size_t u) const;
};

/// Throws DimensionError on ragged groups; warns when total users exceed M.
void check_channels(const UserGroupChannels& channels, const NumerologySet& set);

struct SubbandLayout {
    std::size_t size = 48;

    std::size_t count(std::size_t used) const noexcept { return (used + size - 1) / size; }
    std::size_t of(std::size_t j) const noexcept { return j / size; }
    std::size_t begin(std::size_t sb) const noexcept { return sb * size; }
    /// The last subband is shorter when size does not divide `used`.
    std::size_t end(std::size_t sb, std::size_t used) const noexcept {
        return std::min(used, (sb + 1) * size);
    }
};

struct GroupPrecoders {
    std::vector<CMatrix> subbands;                // M x K_t per subband
    std::vector<std::vector<double>> column_norms; // before normalization
};

struct PrecoderSet {
    PrecoderMethod method = PrecoderMethod::CB;
    Normalization normalization = Normalization::UnitColumn;
    double sigma2 = 0.0;
    SubbandLayout layout;
    /// Applied on top of the columns when transmitting: 1/sqrt(K_total).
    double stream_scale = 1.0;
    std::vector<GroupPrecoders> groups;

    /// Column of user u of group t for subcarrier j of that group's grid.
    CVector column(std::size_t t, std::size_t u, std::size_t j) const;
};

/// Conjugate beamformer h^H as a column, normalized. Throws ZeroChannelError.
CVector cb_precoder(const CVector& h, Normalization norm = Normalization::UnitColumn);

/// (H^H H + sigma2 I)^{-1} h_u^H, the M x M form of h_u^H (H H^H + sigma2 I)^{-1}.
/// `stacked` is K_total x M with channels as rows. Throws ZeroChannelError
/// for a zero result and std::invalid_argument for sigma2 <= 0.
CVector slnr_precoder(const CVector& h_u, const CMatrix& stacked, double sigma2,
                      Normalization norm = Normalization::UnitColumn);

/// Principal eigenvector of mean(h_j^H h_j) over the block rows, returned as
/// a channel row scaled by sqrt(lambda_max) with the first non-negligible
/// entry made real-positive. Zero input yields a zero vector and a warning.
CVector sb_effective_channel(const CMatrix& block);

/// Every user's response brought onto group `target`'s grid. Wider-spacing
/// groups are interpolated, narrower ones decimated, the target untouched.
/// Result is indexed in stacked order, each (used_target x M).
/// Throws GridError for sets whose spacings are not integer multiples.
std::vector<CMatrix> align_channels(const UserGroupChannels& channels, const NumerologySet& set,
                                    std::size_t target, std::size_t filter_len = 33);

/// K_total x M matrix of subband effective channels for subcarriers
/// [begin, end) of the aligned responses.
CMatrix stack_channels(const std::vector<CMatrix>& aligned, std::size_t begin, std::size_t end);

struct PrecoderOptions {
    PrecoderMethod method = PrecoderMethod::CB;
    double sigma2 = 1e-3;
    std::size_t subband_size = 48;
    Normalization normalization = Normalization::UnitColumn;
    std::size_t filter_len = 33;
};

PrecoderSet build_precoder_set(const UserGroupChannels& channels, const NumerologySet& set,
                               const PrecoderOptions& options);

} // namespace mnmimo
