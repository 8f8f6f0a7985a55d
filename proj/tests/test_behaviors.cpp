#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace dartwin;
using namespace dartwin::sim;
using namespace dartwin::testing;

namespace {

const Dt& dt_of(const Model& m, const std::string& id) {
  ModelIndex idx(m);
  for (const auto* d : idx.all_dts()) {
    if (d->id == id) return *d;
  }
  throw std::runtime_error("no dt " + id);
}

// Most recent excursion outside the band decides the command; none yet means the initial state.
bool oracle_thermostat(const std::vector<double>& room, std::size_t k, double comfort, double d, bool initial) {
  for (std::size_t i = k + 1; i-- > 0;) {
    if (room[i] < comfort - d) return true;
    if (room[i] > comfort + d) return false;
  }
  return initial;
}

CostTable random_table(std::mt19937& rng) {
  std::uniform_int_distribution<int> rows(0, 5);
  std::uniform_real_distribution<double> step(0.01, 1.0);
  std::vector<std::pair<double, double>> out;
  double price = 0, delta = 0;
  for (int i = rows(rng); i > 0; --i) {
    price += step(rng);
    delta -= step(rng) * 2;
    out.emplace_back(price, delta);
  }
  return make_cost_table(out);
}

}  // namespace

TEST(Behaviors, ThermostatHysteresis) {
  EXPECT_TRUE(thermostat_command(20.4, 21, 0.5, false));
  EXPECT_FALSE(thermostat_command(21.6, 21, 0.5, true));
  EXPECT_TRUE(thermostat_command(20.5, 21, 0.5, true));
  EXPECT_FALSE(thermostat_command(21.5, 21, 0.5, false));
}

TEST(Behaviors, EnergySavingSetpoint) {
  EXPECT_EQ(energy_saving_setpoint(21, true, false, -2, -4), 21);
  EXPECT_EQ(energy_saving_setpoint(21, false, true, -2, -4), 19);
  EXPECT_EQ(energy_saving_setpoint(21, false, false, -2, -4), 17);
}

TEST(Behaviors, FreezeCommand) {
  EXPECT_TRUE(freeze_command(8, false, 8));
  EXPECT_FALSE(freeze_command(8.01, false, 8));
  EXPECT_TRUE(freeze_command(30, true, 8));
}

TEST(Behaviors, FireTimerCutsAndCoolsOff) {
  FireTimer t(3, 2);
  std::vector<bool> out;
  for (int i = 0; i < 10; ++i) out.push_back(t.step(true, 1));
  EXPECT_EQ(out, (std::vector<bool>{true, true, true, false, false, true, true, true, false, false}));
  EXPECT_THROW(FireTimer(0, 1), BindError);
  EXPECT_THROW(FireTimer(1, -1), BindError);
}

TEST(Behaviors, CostTableLookup) {
  auto table = make_cost_table({{1.0, -1.0}, {2.0, -3.0}});
  EXPECT_EQ(table.delta(0.5), 0);
  EXPECT_EQ(table.delta(1.0), -1);
  EXPECT_EQ(table.delta(1.99), -1);
  EXPECT_EQ(table.delta(2.0), -3);
  EXPECT_EQ(cost_saving_setpoint(21, 5, table), 18);
  EXPECT_THROW(make_cost_table({{1.0, 1.0}}), BindError);
  EXPECT_THROW(make_cost_table({{2.0, -1.0}, {1.0, -2.0}}), BindError);
  EXPECT_THROW(make_cost_table({{1.0, -2.0}, {2.0, -1.0}}), BindError);
}

TEST(Behaviors, Arbiters) {
  EXPECT_EQ(arbiter_min(19, 18), 18);
  EXPECT_EQ(arbiter_strictest({2, 0.5}, {1, 0.8}), (KineticLimits{1, 0.5}));
}

TEST(Behaviors, RegistryKeysAndParameters) {
  auto r = builtin_registry();
  for (const char* key : {"thermostat", "energy_saving", "freeze_protection", "fire_protection", "cost_saving", "min",
                          "strictest"}) {
    EXPECT_EQ(r.count(key), 1u) << key;
  }
  EXPECT_EQ(r.at("freeze_protection").parameters, std::set<std::string>{"threshold"});
  EXPECT_TRUE(r.at("min").parameters.empty());
}

TEST(Behaviors, ThermostatObjectMapsPortsByRole) {
  Model m = corpus("thermal_comfort");
  auto b = builtin_registry().at("thermostat").make(dt_of(m, "ThermostatLogic"), {{"deviation", "1"}});
  EXPECT_EQ(b->required_inputs(), (std::vector<std::string>{"comfort_temp", "room_temp"}));
  auto out = b->step({{"comfort_temp", 21.0}, {"room_temp", 19.5}}, {});
  EXPECT_EQ(out.at("heater"), Value(true));
  out = b->step({{"comfort_temp", 21.0}, {"room_temp", 21.9}}, {});
  EXPECT_EQ(out.at("heater"), Value(true));
  out = b->step({{"comfort_temp", 21.0}, {"room_temp", 22.1}}, {});
  EXPECT_EQ(out.at("heater"), Value(false));
}

TEST(Behaviors, ParameterErrors) {
  Model m = corpus("thermal_comfort");
  const Dt& d = dt_of(m, "ThermostatLogic");
  auto r = builtin_registry();
  EXPECT_THROW(r.at("thermostat").make(d, {{"deviation", "abc"}}), BindError);
  EXPECT_THROW(r.at("thermostat").make(d, {{"deviation", "0"}}), BindError);
  EXPECT_THROW(r.at("thermostat").make(d, {{"initial", "maybe"}}), BindError);
  // The thermostat has no boolean presence input.
  EXPECT_THROW(r.at("energy_saving").make(d, {}), BindError);
  EXPECT_THROW(r.at("min").make(d, {}), BindError);

  Model c = corpus("compromise_saving");
  EXPECT_THROW(r.at("cost_saving").make(dt_of(c, "CostSaving"), {{"table", "1.0:-1,0.5:-3"}}), BindError);
  EXPECT_THROW(r.at("cost_saving").make(dt_of(c, "CostSaving"), {{"table", "1.0"}}), BindError);
  EXPECT_THROW(r.at("energy_saving").make(dt_of(c, "EnergySaving"), {{"absent_day_delta", "1"}}), BindError);
}

TEST(Behaviors, CostSavingObjectParsesTable) {
  Model c = corpus("compromise_saving");
  auto b = builtin_registry().at("cost_saving").make(dt_of(c, "CostSaving"), {{"table", " 0.5:-0.5 , 3:-2 "}});
  auto out = b->step({{"price", 1.0}, {"user_comfort_temp", 21.0}}, {});
  EXPECT_EQ(out.at("comfort_temp"), Value(20.5));
}

TEST(Behaviors, MinArbiterObject) {
  Model c = corpus("compromise_saving");
  auto b = builtin_registry().at("min").make(dt_of(c, "Arbiter"), {});
  EXPECT_EQ(b->required_inputs(), (std::vector<std::string>{"in_1", "in_2"}));
  EXPECT_EQ(b->step({{"in_1", 19.0}, {"in_2", 18.0}}, {}).at("out_1"), Value(18.0));
}

TEST(BehaviorProperty, ArbiterAlgebra) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> x(-50, 50);
  std::uniform_real_distribution<double> pos(0, 10);
  for (int i = 0; i < 200; ++i) {
    double a = x(rng), b = x(rng), c = x(rng);
    ASSERT_EQ(arbiter_min(a, b), arbiter_min(b, a));
    ASSERT_EQ(arbiter_min(arbiter_min(a, b), c), arbiter_min(a, arbiter_min(b, c)));
    ASSERT_EQ(arbiter_min(a, a), a);
    ASSERT_LE(arbiter_min(a, b), a);
    ASSERT_LE(arbiter_min(a, b), b);
    ASSERT_TRUE(arbiter_min(a, b) == a || arbiter_min(a, b) == b);

    KineticLimits p{pos(rng), pos(rng)}, q{pos(rng), pos(rng)}, r{pos(rng), pos(rng)};
    ASSERT_EQ(arbiter_strictest(p, q), arbiter_strictest(q, p));
    ASSERT_EQ(arbiter_strictest(arbiter_strictest(p, q), r), arbiter_strictest(p, arbiter_strictest(q, r)));
    ASSERT_EQ(arbiter_strictest(p, p), p);
    auto s = arbiter_strictest(p, q);
    ASSERT_LE(s.max_velocity, std::min(p.max_velocity, q.max_velocity));
    ASSERT_LE(s.max_acceleration, std::min(p.max_acceleration, q.max_acceleration));
  }
}

TEST(BehaviorProperty, CostSavingIsMonotoneInPrice) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> price(0, 4);
  std::uniform_real_distribution<double> user(5, 30);
  for (int i = 0; i < 200; ++i) {
    auto table = random_table(rng);
    double p1 = price(rng), p2 = price(rng), u = user(rng);
    if (p1 > p2) std::swap(p1, p2);
    double s1 = cost_saving_setpoint(u, p1, table), s2 = cost_saving_setpoint(u, p2, table);
    ASSERT_LE(s2, s1);
    ASSERT_LE(s1, u);
  }
}

TEST(BehaviorProperty, EnergySavingNeverRaisesSetpoint) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> user(5, 30), delta(-6, 0);
  for (int i = 0; i < 200; ++i) {
    double u = user(rng), a = delta(rng), b = delta(rng);
    double day = std::max(a, b), night = std::min(a, b);
    ASSERT_EQ(energy_saving_setpoint(u, true, i % 2 == 0, day, night), u);
    double sd = energy_saving_setpoint(u, false, true, day, night);
    double sn = energy_saving_setpoint(u, false, false, day, night);
    ASSERT_LE(sn, sd);
    ASSERT_LE(sd, u);
  }
}

TEST(BehaviorProperty, FireTimerBoundsEveryOnRun) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> len(1, 20);
  std::bernoulli_distribution coin(0.85);
  for (int i = 0; i < 150; ++i) {
    double dt = std::uniform_int_distribution<int>(1, 4)(rng) * 0.5;
    double max_on = len(rng), cooloff = len(rng);
    FireTimer t(max_on, cooloff);
    const int cool_steps = static_cast<int>(std::ceil(cooloff / dt - 1e-9));
    double run = 0;
    int off_after_cut = -1;  // >= 0 while counting the hold after a cut
    bool prev = false;
    for (int k = 0; k < 400; ++k) {
      bool up = coin(rng);
      bool on = t.step(up, dt);
      ASSERT_TRUE(!on || up) << "turned on without a request";
      run = on ? run + dt : 0;
      ASSERT_LE(run, max_on + 1e-9);
      if (off_after_cut >= 0) {
        if (off_after_cut < cool_steps) {
          ASSERT_FALSE(on) << "on during cool-off";
          ++off_after_cut;
        } else {
          off_after_cut = -1;
        }
      }
      // A cut: the request persisted but the run would have exceeded the limit.
      if (prev && up && !on && off_after_cut < 0) off_after_cut = 1;
      prev = on;
    }
  }
}

TEST(BehaviorProperty, ThermostatMatchesBruteForceOracle) {
  std::mt19937 rng(5);
  std::normal_distribution<double> walk(0, 0.4);
  std::uniform_real_distribution<double> comfort(15, 25), dev(0.1, 2);
  for (int i = 0; i < 150; ++i) {
    double c = comfort(rng), d = dev(rng);
    bool initial = i % 2 == 0;
    std::vector<double> room{c + walk(rng) * 5};
    for (int k = 1; k < 200; ++k) room.push_back(room.back() + walk(rng));
    bool cmd = initial;
    for (std::size_t k = 0; k < room.size(); ++k) {
      bool next = thermostat_command(room[k], c, d, cmd);
      ASSERT_EQ(next, oracle_thermostat(room, k, c, d, initial)) << "step " << k;
      // No chatter: a switch happens only outside the band, in the matching direction.
      if (next && !cmd) {
        ASSERT_LT(room[k], c - d);
      }
      if (!next && cmd) {
        ASSERT_GT(room[k], c + d);
      }
      cmd = next;
    }
  }
}
