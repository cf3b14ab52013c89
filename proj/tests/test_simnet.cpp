#include <doctest.h>

#include "semoverlay/simnet.hpp"
#include "support/simfix.hpp"

using namespace semo;

TEST_CASE("latency is base plus alpha times coordinate distance") {
    SimConfig cfg;
    cfg.seed = 1;
    cfg.flood.ttl = 1;  // no echo forwarding, one spread hop only
    simfix::Fixture fx(2, OverlayKind::Flood, cfg);
    fx.sim->schedule_join(0, "10.0.0.1", Coord{0.0, 0.0}, {});
    fx.sim->schedule_join(1, "10.0.0.2", Coord{1.0, 0.0}, {});
    fx.sim->run_for(100);

    // peers at distance 1.0 under defaults: 10 + 90 * 1.0 = 100 ms
    std::vector<const SimPeer*> ps;
    for (const auto& [id, p] : fx.sim->peers()) ps.push_back(&p);
    REQUIRE(ps.size() == 2);
    CHECK(coord_distance(ps[0]->coord, ps[1]->coord) == doctest::Approx(1.0));
    // observe one message latency through a measurement route
    // (both peers share the __default cluster; send a flood query instead)
    SimTime before = fx.sim->now();
    uint64_t f = fx.sim->inject_flood(ps[0]->packed,
                                      TriplePattern{variable("s"), iri("x:p0"),
                                                    variable("o")});
    fx.sim->settle();
    const Flow& flow = fx.sim->flow(f);
    CHECK(flow.processed.size() == 2);
    CHECK(flow.completed - before == 100);
}

TEST_CASE("messages to dead peers are dropped and counted") {
    SimConfig cfg;
    cfg.seed = 2;
    cfg.flood.ttl = 1;
    simfix::Fixture fx(1, OverlayKind::Flood, cfg);
    fx.add_peer(0, 0);
    fx.add_peer(0, 20);
    fx.sim->run_for(3000);
    auto members = fx.members_of(0);
    REQUIRE(members.size() == 2);

    // put a spread message in flight toward the second peer, then kill it
    // before the delivery time arrives
    uint64_t before_dropped = fx.sim->metrics().query.dropped;
    uint64_t f = fx.sim->inject_flood(
        members[0], TriplePattern{variable("s"), iri("x:p0"), variable("o")});
    fx.sim->schedule_leave(fx.sim->now() + 1, members[1], false);
    fx.sim->settle();
    CHECK(fx.sim->metrics().query.dropped == before_dropped + 1);
    CHECK(fx.sim->flow(f).processed.size() == 1);  // only the origin evaluated
    fx.sim->finalize();
    const Metrics& m = fx.sim->metrics();
    CHECK(m.query.sent == m.query.delivered + m.query.dropped);
    CHECK(m.maintenance.sent ==
          m.maintenance.delivered + m.maintenance.dropped);
}

TEST_CASE("identical seeds give identical event traces") {
    auto run_once = [](uint64_t seed) {
        SimConfig cfg;
        cfg.seed = seed;
        simfix::Fixture fx(3, OverlayKind::Chord, cfg);
        SimTime t = 0;
        for (size_t c = 0; c < 3; ++c)
            for (int i = 0; i < 5; ++i) fx.add_peer(c, t += 15);
        fx.sim->run_until(t + 4000);
        uint64_t src = fx.members_of(0).front();
        fx.sim->inject_route(src, simfix::cluster_name(2));
        fx.sim->settle();
        fx.sim->finalize();
        return fx.sim->event_hash();
    };
    CHECK(run_once(99) == run_once(99));
    CHECK(run_once(99) != run_once(100));  // different seed, different trace
}

TEST_CASE("message conservation per tag after drain") {
    SimConfig cfg;
    cfg.seed = 5;
    simfix::Fixture fx(2, OverlayKind::Flood, cfg);
    SimTime t = 0;
    for (size_t c = 0; c < 2; ++c)
        for (int i = 0; i < 6; ++i) fx.add_peer(c, t += 10);
    fx.sim->run_until(t + 3000);
    fx.sim->schedule_leave(fx.sim->now(), fx.members_of(0).front(), false);
    fx.sim->run_for(2000);
    fx.sim->finalize();
    const Metrics& m = fx.sim->metrics();
    CHECK(m.query.sent == m.query.delivered + m.query.dropped);
    CHECK(m.response.sent == m.response.delivered + m.response.dropped);
    CHECK(m.maintenance.sent == m.maintenance.delivered + m.maintenance.dropped);
}

TEST_CASE("join follows placement, stores home data, registers foreign indices") {
    SimConfig cfg;
    cfg.seed = 7;
    simfix::Fixture fx(2, OverlayKind::Chord, cfg);
    // seed both clusters so routing works
    fx.add_peer(0, 0);
    fx.add_peer(1, 20);
    fx.sim->run_for(3000);

    // a peer whose data splits 7:3 across SC00 and SC01
    std::set<Triple> data;
    for (size_t i = 0; i < 7; ++i) data.insert(simfix::mono_triple(0, i, (i + 1) % 8));
    for (size_t i = 0; i < 3; ++i) data.insert(simfix::mono_triple(1, i, (i + 2) % 8));
    fx.sim->schedule_join(fx.sim->now(), fx.fresh_address(), Coord{0.5, 0.5},
                          std::move(data));
    fx.sim->run_for(cfg.t_stab * 4);

    // home = majority cluster
    uint64_t joined = 0;
    for (const auto& [id, p] : fx.sim->peers())
        if (p.repository.size() == 10) joined = id;
    REQUIRE(joined != 0);
    CHECK(fx.sim->peers().at(joined).home_cluster == "SC00");

    // after a republish interval the three foreign triples are indexed in
    // SC01 under each pair key
    fx.sim->run_for(cfg.t_republish * 2 + 2000);
    size_t index_entries = 0;
    for (uint64_t m : fx.members_of(1)) {
        for (const auto& [key, items] : fx.sim->peers().at(m).chord.store)
            for (const auto& item : items)
                if (std::holds_alternative<IndexEntry>(item)) ++index_entries;
    }
    CHECK(index_entries == 9);  // 3 triples x 3 pair keys
}

TEST_CASE("first peer of the system bootstraps alone") {
    SimConfig cfg;
    cfg.seed = 11;
    simfix::Fixture fx(2, OverlayKind::Chord, cfg);
    fx.add_peer(0, 0);
    fx.sim->run_for(2000);
    CHECK(fx.sim->live_peer_count() == 1);
    uint64_t only = fx.members_of(0).front();
    const SimPeer& p = fx.sim->peers().at(only);
    CHECK(p.chord.successors.empty());  // own successor
    // its own data is stored locally in the DHT
    CHECK(p.chord.stored_items() >= 1);
}

TEST_CASE("churn events follow the seeded schedule") {
    // the Poisson count oracle lives in the harness; here we check that
    // rate zero means no lifecycle events at all
    SimConfig cfg;
    cfg.seed = 3;
    simfix::Fixture fx(1, OverlayKind::Flood, cfg);
    for (int i = 0; i < 5; ++i) fx.add_peer(0, i * 10);
    fx.sim->run_for(4000);
    CHECK(fx.sim->metrics().joins == 5);
    CHECK(fx.sim->metrics().leaves_graceful + fx.sim->metrics().leaves_abrupt == 0);
}
