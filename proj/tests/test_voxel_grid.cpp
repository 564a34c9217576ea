#include <doctest.h>

#include "pcat/voxel_grid.hpp"

using namespace pcat;

TEST_CASE("grid dimensions and voxel volume") {
  const ImageGrid grid({4, 5, 6}, {0.5, 0.5, 2.0});
  CHECK(grid.size() == 4 * 5 * 6);
  CHECK(grid.data().size() == grid.size());
  CHECK(grid.voxel_volume_mm3() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(ImageGrid({0, 5, 6}, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(ImageGrid({4, 5, 6}, {1, 0.0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(ImageGrid({4, 5, 6}, {1, -0.5, 1}), std::invalid_argument);
}

TEST_CASE("linear order is x-fastest") {
  ImageGrid grid({3, 4, 5}, {1, 1, 1});
  CHECK(grid.linear_index(1, 0, 0) == 1);
  CHECK(grid.linear_index(0, 1, 0) == 3);
  CHECK(grid.linear_index(0, 0, 1) == 12);
  for (std::size_t lin = 0; lin < grid.size(); ++lin)
    CHECK(grid.linear_index(grid.index_of(lin)) == lin);
}

TEST_CASE("index_to_world") {
  SUBCASE("origin case") {
    const ImageGrid grid({4, 4, 4}, {1, 1, 1}, {0, 0, 0});
    const Vec3 w = grid.index_to_world({0, 0, 0});
    CHECK(w == Vec3{0, 0, 0});
  }
  SUBCASE("scaling") {
    const ImageGrid grid({4, 4, 4}, {0.5, 0.5, 0.5}, {0, 0, 0});
    const Vec3 w = grid.index_to_world({2, 0, 0});
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[1] == 0.0);
    CHECK(w[2] == 0.0);
  }
  SUBCASE("anisotropic with offset origin") {
    const ImageGrid grid({4, 4, 4}, {0.4, 0.4, 0.6}, {10, 0, -5});
    const Vec3 w = grid.index_to_world({1, 2, 3});
    CHECK(w[0] == doctest::Approx(10.4).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(-3.2).epsilon(1e-12));
  }
  SUBCASE("out of bounds") {
    const ImageGrid grid({4, 4, 4}, {1, 1, 1});
    CHECK_THROWS_AS(grid.index_to_world({4, 0, 0}), std::out_of_range);
    CHECK_THROWS_AS(grid.index_to_world({0, -1, 0}), std::out_of_range);
  }
}

TEST_CASE("world_to_nearest_index inverts index_to_world for every voxel") {
  const ImageGrid grid({5, 6, 7}, {0.4, 0.7, 1.3}, {-3.0, 2.5, 11.0});
  for (std::int64_t k = 0; k < 7; ++k)
    for (std::int64_t j = 0; j < 6; ++j)
      for (std::int64_t i = 0; i < 5; ++i) {
        const Index3 back = grid.world_to_nearest_index(grid.index_to_world({i, j, k}));
        CHECK(back == Index3{i, j, k});
      }
}

TEST_CASE("geometry comparison") {
  const ImageGrid a({4, 4, 4}, {1, 1, 2}, {0, 0, 0});
  const BinaryMask b({4, 4, 4}, {1, 1, 2}, {0, 0, 0});
  const BinaryMask c({4, 4, 4}, {1, 1, 2.01}, {0, 0, 0});
  const BinaryMask d({4, 4, 5}, {1, 1, 2}, {0, 0, 0});
  CHECK(a.same_geometry(b));
  CHECK_FALSE(a.same_geometry(c));
  CHECK_FALSE(a.same_geometry(d));
}
