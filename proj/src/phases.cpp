#include "ptnet/phases.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ptnet {

const LocalPhase* IntersectionPhases::find(int local_id) const {
  for (const auto& p : phases)
    if (p.id == local_id) return &p;
  return nullptr;
}

int PhaseSet::index_of(const std::vector<int>& locals) const {
  for (size_t i = 0; i < phases.size(); ++i)
    if (phases[i].locals == locals) return static_cast<int>(i);
  return -1;
}

std::string PhaseSet::label(int phase) const {
  std::ostringstream os;
  os << "<";
  const auto& loc = phases[phase].locals;
  for (size_t i = 0; i < loc.size(); ++i) os << (i ? "," : "") << loc[i];
  os << ">";
  return os.str();
}

PhaseSet generate_generalized_phases(
    const std::vector<IntersectionPhases>& locals) {
  PhaseSet out;
  out.intersections = locals;
  for (const auto& ix : locals)
    if (ix.phases.empty())
      throw std::invalid_argument("intersection " + std::to_string(ix.id) +
                                  " has no local phases");
  if (locals.empty()) {
    // Signal-free network: one null phase, everything always open.
    GeneralizedPhase gp;
    gp.gmin = gp.gmax = 1;
    out.phases.push_back(gp);
    return out;
  }
  std::vector<size_t> cursor(locals.size(), 0);
  while (true) {
    GeneralizedPhase gp;
    gp.gmin = 0;
    gp.gmax = 0;
    bool first = true;
    for (size_t i = 0; i < locals.size(); ++i) {
      const LocalPhase& lp = locals[i].phases[cursor[i]];
      gp.locals.push_back(lp.id);
      if (first) {
        gp.gmin = lp.gmin;
        gp.gmax = lp.gmax;
        gp.yellow = lp.yellow;
        gp.allred = lp.allred;
        first = false;
      } else {
        gp.gmin = std::min(gp.gmin, lp.gmin);
        gp.gmax = std::min(gp.gmax, lp.gmax);
        gp.yellow = std::max(gp.yellow, lp.yellow);
        gp.allred = std::max(gp.allred, lp.allred);
      }
    }
    if (gp.gmin > gp.gmax) {
      std::ostringstream os;
      os << "dropped phase <";
      for (size_t i = 0; i < gp.locals.size(); ++i)
        os << (i ? "," : "") << gp.locals[i];
      os << ">: derived gmin " << gp.gmin << " > gmax " << gp.gmax;
      out.dropped.push_back(os.str());
    } else {
      out.phases.push_back(std::move(gp));
    }
    // advance the odometer (last intersection fastest)
    size_t i = locals.size();
    while (i > 0) {
      --i;
      if (++cursor[i] < locals[i].phases.size()) break;
      cursor[i] = 0;
      if (i == 0) return out;
    }
  }
}

MappingMatrix build_mapping(const PhaseSet& pset, const RoadNetwork& net,
                            double delta) {
  MappingMatrix mm;
  mm.delta = delta;
  mm.n_phases = static_cast<int>(pset.phases.size());
  mm.ctrl_links = net.controlled_link_ids();
  mm.ctrl_index.assign(net.links.size(), -1);
  for (size_t c = 0; c < mm.ctrl_links.size(); ++c)
    mm.ctrl_index[mm.ctrl_links[c]] = static_cast<int>(c);
  mm.m.assign(mm.ctrl_links.size() * pset.phases.size(), 0.0);

  // intersection id -> position in the ordered intersection list
  std::vector<int> ix_ids;
  for (const auto& ix : pset.intersections) ix_ids.push_back(ix.id);

  for (size_t c = 0; c < mm.ctrl_links.size(); ++c) {
    const Link& link = net.links[mm.ctrl_links[c]];
    auto it = std::find(ix_ids.begin(), ix_ids.end(), link.intersection);
    if (it == ix_ids.end())
      throw std::invalid_argument("link " + std::to_string(link.from) + "->" +
                                  std::to_string(link.to) +
                                  " references unknown intersection " +
                                  std::to_string(link.intersection));
    size_t ix_pos = it - ix_ids.begin();
    for (int p = 0; p < mm.n_phases; ++p) {
      int local_id = pset.phases[p].locals[ix_pos];
      double val = 0.0;
      for (const ServingPhase& sp : link.served_by) {
        if (sp.local_phase == local_id) {
          val = sp.protection == Protection::Protected ? 1.0 : delta;
          break;
        }
      }
      mm.m[c * mm.n_phases + p] = val;
    }
  }
  return mm;
}

namespace {

// Positions of each local id in a semi-adaptive sequence.
int next_in_sequence(const std::vector<int>& seq, int local_id) {
  for (size_t i = 0; i < seq.size(); ++i)
    if (seq[i] == local_id) return seq[(i + 1) % seq.size()];
  throw std::invalid_argument("local phase " + std::to_string(local_id) +
                              " missing from semi-adaptive sequence");
}

std::vector<int> semi_successors(const PhaseSet& pset, int phase,
                                 const TransitionPolicy& policy) {
  const auto& cur = pset.phases[phase].locals;
  // Per intersection: stay or advance to the fixed successor.
  std::vector<std::vector<int>> options(cur.size());
  for (size_t i = 0; i < cur.size(); ++i) {
    options[i].push_back(cur[i]);
    int nxt = next_in_sequence(policy.sequences[i], cur[i]);
    if (nxt != cur[i]) options[i].push_back(nxt);
  }
  std::vector<int> out;
  std::vector<size_t> cursor(cur.size(), 0);
  while (true) {
    std::vector<int> cand;
    for (size_t i = 0; i < cur.size(); ++i) cand.push_back(options[i][cursor[i]]);
    int idx = pset.index_of(cand);
    if (idx >= 0 && idx != phase) out.push_back(idx);
    size_t i = cur.size();
    bool done = true;
    while (i > 0) {
      --i;
      if (++cursor[i] < options[i].size()) {
        done = false;
        break;
      }
      cursor[i] = 0;
    }
    if (done) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<int> successors(const PhaseSet& pset, int phase,
                            const TransitionPolicy& policy) {
  std::vector<int> out;
  switch (policy.mode) {
    case TransitionPolicy::Mode::FullyAdaptive:
      for (int q = 0; q < static_cast<int>(pset.phases.size()); ++q)
        if (q != phase) out.push_back(q);
      break;
    case TransitionPolicy::Mode::SemiAdaptive:
      out = semi_successors(pset, phase, policy);
      break;
    case TransitionPolicy::Mode::PhaseGroups: {
      PolicyGraph g = build_policy_graph(pset, policy);
      int s = g.state_for_phase(phase);
      if (s < 0) return out;
      std::set<int> uniq;
      for (int s2 : g.succ[s]) uniq.insert(g.states[s2].phase);
      out.assign(uniq.begin(), uniq.end());
      break;
    }
  }
  return out;
}

int PolicyGraph::state_for_phase(int phase) const {
  for (int s = 0; s < n_states(); ++s)
    if (states[s].phase == phase) return s;
  return -1;
}

PolicyGraph build_policy_graph(const PhaseSet& pset,
                               const TransitionPolicy& policy) {
  PolicyGraph g;
  int n = static_cast<int>(pset.phases.size());

  if (policy.mode != TransitionPolicy::Mode::PhaseGroups) {
    g.states.resize(n);
    g.succ.resize(n);
    g.fixed_durations.resize(n);
    g.min_completion.assign(n, 0);
    for (int p = 0; p < n; ++p) g.states[p] = {p, -1};
    for (int p = 0; p < n; ++p) g.succ[p] = successors(pset, p, policy);
    return g;
  }

  // Block slots first (in script order), then free phases.
  std::set<int> in_block;
  std::vector<int> slot_state;
  for (size_t b = 0; b < policy.blocks.size(); ++b) {
    int phase = pset.index_of(policy.blocks[b].phase_locals);
    if (phase < 0)
      throw std::invalid_argument("phase group block " + std::to_string(b) +
                                  " names an unknown generalized phase");
    slot_state.push_back(static_cast<int>(g.states.size()));
    g.states.push_back({phase, static_cast<int>(b)});
    g.fixed_durations.push_back(policy.blocks[b].durations);
    in_block.insert(phase);
  }
  std::vector<int> free_state;
  for (int p = 0; p < n; ++p) {
    if (in_block.count(p)) continue;
    free_state.push_back(static_cast<int>(g.states.size()));
    g.states.push_back({p, -1});
    g.fixed_durations.push_back({});
  }
  g.succ.resize(g.states.size());
  int nb = static_cast<int>(slot_state.size());
  for (int b = 0; b < nb; ++b) {
    if (b + 1 < nb) {
      g.succ[slot_state[b]] = {slot_state[b + 1]};
    } else {
      // Group end: re-enter the group or leave to any free phase.
      if (nb > 0) g.succ[slot_state[b]].push_back(slot_state[0]);
      for (int f : free_state) g.succ[slot_state[b]].push_back(f);
    }
  }
  for (int f : free_state) {
    for (int f2 : free_state)
      if (f2 != f) g.succ[f].push_back(f2);
    if (nb > 0) g.succ[f].push_back(slot_state[0]);  // block entry point only
    std::sort(g.succ[f].begin(), g.succ[f].end());
  }
  // Minimal block-suffix completion times (atomic groups).
  g.min_completion.assign(g.states.size(), 0);
  int suffix = 0;
  for (int b = nb - 1; b >= 0; --b) {
    const PhaseGroupBlock& blk = policy.blocks[b];
    int min_dur = *std::min_element(blk.durations.begin(), blk.durations.end());
    int phase = g.states[slot_state[b]].phase;
    suffix += min_dur + pset.phases[phase].clearance();
    g.min_completion[slot_state[b]] = suffix;
  }
  return g;
}

}  // namespace ptnet
