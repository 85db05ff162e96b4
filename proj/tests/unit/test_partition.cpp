#include "doctest.h"
#include "tgopt/error.hpp"
#include "tgopt/partition.hpp"

using namespace tgopt;

TEST_CASE("GroupKey sorts and deduplicates") {
  GroupKey g{3, 1, 3, 2};
  CHECK(g.members() == std::vector<std::size_t>{1, 2, 3});
  CHECK(g.contains(2));
  CHECK_FALSE(g.contains(0));
  CHECK(GroupKey{2, 1} == GroupKey{1, 2});
}

TEST_CASE("Partition canonicalizes group order") {
  Partition p(4, {GroupKey{3, 2}, GroupKey{0}, GroupKey{1}});
  CHECK(p.groups()[0] == GroupKey{0});
  CHECK(p.groups()[2] == GroupKey{2, 3});
  CHECK(p.group_of(3) == 2);
  CHECK(p.labels() == std::vector<std::size_t>{0, 1, 2, 2});
}

TEST_CASE("invalid partitions are rejected") {
  CHECK_THROWS_AS(Partition(3, {GroupKey{0, 1}}), Error);
  CHECK_THROWS_AS(Partition(3, {GroupKey{0, 1}, GroupKey{1, 2}}), Error);
  CHECK_THROWS_AS(Partition(2, {GroupKey{0, 1, 2}}), Error);
  try {
    Partition(3, {GroupKey{0}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidPartition);
  }
}

TEST_CASE("from_labels accepts arbitrary label values") {
  const std::vector<std::size_t> labels{7, 3, 7, 9};
  const auto p = Partition::from_labels(labels);
  CHECK(p == Partition(4, {GroupKey{0, 2}, GroupKey{1}, GroupKey{3}}));
}

TEST_CASE("singletons and single group") {
  CHECK(Partition::singletons(4).n_groups() == 4);
  CHECK(Partition::single_group(4).n_groups() == 1);
}

TEST_CASE("is_valid_partition") {
  const std::vector<GroupKey> ok{GroupKey{0, 2}, GroupKey{1}};
  const std::vector<GroupKey> gap{GroupKey{0, 2}};
  CHECK(is_valid_partition(3, ok));
  CHECK_FALSE(is_valid_partition(3, gap));
}

TEST_CASE("differs_by_single_move") {
  const Partition a(4, {GroupKey{0, 1}, GroupKey{2, 3}});
  CHECK(differs_by_single_move(a, Partition(4, {GroupKey{0, 1, 2}, GroupKey{3}})));
  CHECK(differs_by_single_move(a, Partition(4, {GroupKey{0}, GroupKey{1}, GroupKey{2, 3}})));
  CHECK_FALSE(differs_by_single_move(a, a));
  CHECK_FALSE(differs_by_single_move(a, Partition(4, {GroupKey{0, 2}, GroupKey{1, 3}})));
  CHECK_FALSE(differs_by_single_move(a, Partition::singletons(4)));
}
