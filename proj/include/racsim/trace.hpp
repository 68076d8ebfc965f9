#pragma once

#include "racsim/controller.hpp"
#include "racsim/safety.hpp"
#include "racsim/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace racsim {

enum class StepEvent : unsigned char { None, Switch, Shutdown };

/// One sample of the closed-loop record: state at the step start and the
/// command applied over the step.
struct TraceRow {
    double t = 0.0;
    Vec x;
    Vec u_raw;  // one entry per control chain, before limits
    Vec u_sat;
    Vec e;  // one entry per state slot; zero where no subsystem error applies
    double envelope = 0.0;
    PolicyTag policy = PolicyTag::Rac;
    StepEvent event = StepEvent::None;
};

/// Uniform-grid rollout record. All rows share the step; supervisory events
/// land on grid times. Serializes to CSV with columns
/// t, x1..xn, u_raw, u_sat, e1..en, envelope, policy, event
/// (u columns are numbered when more than one chain is present).
struct Trace {
    double step_s = 0.0;
    int state_dim = 0;
    int chain_count = 1;
    std::vector<TraceRow> rows;
    std::vector<SupervisorEvent> events;

    // Which error slots feed the aggregate tracking metrics. Not persisted in
    // the CSV; readers fall back to the single-chain convention e1/e2.
    std::vector<int> primary_error_idx = {0};
    std::vector<int> secondary_error_idx = {1};

    bool shutdown() const {
        return !rows.empty() && rows.back().event == StepEvent::Shutdown;
    }
    double shutdown_time() const;
    bool switched() const;
    double switch_time() const;

    void write_csv(std::ostream& out) const;
    void write_csv_file(const std::string& path) const;
    static Trace read_csv(std::istream& in);
    static Trace read_csv_file(const std::string& path);
};

/// Round-trip exact decimal formatting used for every CSV the library emits.
std::string format_double(double v);

}  // namespace racsim
