# ====================================
#  ROUTE GRAPH  🧭
# ====================================
"""
Pixel-wise routable graph over FLOOR cells.

8-connectivity with weight 1 for orthogonal and sqrt(2) for diagonal steps.
A diagonal step is only allowed when both orthogonal cells it passes are
FLOOR, so paths never cut wall corners.
"""
import heapq
import logging

import networkx as nx

from gridworld.grid import FLOOR, GridCoord
from utils.exceptions import InvalidParams, NoFloor, Unreachable
from .trajectory import SQRT2, Trajectory

logger = logging.getLogger(__name__)

ORTHOGONAL_STEPS = ((1, 0), (0, 1))
DIAGONAL_STEPS = ((1, 1), (-1, 1))


class RouteGraph:
    """Undirected weighted graph keyed by GridCoord"""

    def __init__(self, graph):
        self.graph = graph

    @property
    def nodes(self):
        return self.graph.nodes

    @property
    def edges(self):
        return self.graph.edges

    def __contains__(self, p):
        return GridCoord(*p) in self.graph

    def neighbors(self, p):
        return self.graph.adj[p].items()

    def components(self):
        """Node sets of the connected components, largest first"""
        return sorted(nx.connected_components(self.graph), key=len, reverse=True)

    def __str__(self):
        return f"RouteGraph ({self.graph.number_of_nodes()} nodes, {self.graph.number_of_edges()} edges)"


def build_route_graph(grid):
    cells = grid.cells
    height, width = cells.shape

    def floor(x, y):
        return 0 <= x < width and 0 <= y < height and cells[y, x] == FLOOR

    graph = nx.Graph()
    for p in grid.floor_cells():
        graph.add_node(p)
    if graph.number_of_nodes() == 0:
        raise NoFloor("The grid has no floor cells to route over")

    for x, y in grid.floor_cells():
        for dx, dy in ORTHOGONAL_STEPS:
            if floor(x + dx, y + dy):
                graph.add_edge(GridCoord(x, y), GridCoord(x + dx, y + dy), weight=1.0)
        for dx, dy in DIAGONAL_STEPS:
            if floor(x + dx, y + dy) and floor(x + dx, y) and floor(x, y + dy):
                graph.add_edge(GridCoord(x, y), GridCoord(x + dx, y + dy), weight=SQRT2)

    route_graph = RouteGraph(graph)
    logger.debug(f"Built {route_graph}")
    return route_graph


def dijkstra_shortest_path(graph, start, goal):
    """
    Minimum-weight path from start to goal. The queue is ordered by
    (distance, y, x) so equal-cost alternatives resolve the same way on
    every run.
    """
    start, goal = GridCoord(*start), GridCoord(*goal)
    for p in (start, goal):
        if p not in graph:
            raise InvalidParams(f"{tuple(p)} is not a floor node of the route graph")

    dist = {start: 0.0}
    parent = {}
    done = set()
    queue = [(0.0, start.y, start.x)]

    while queue:
        cost, y, x = heapq.heappop(queue)
        node = GridCoord(x, y)
        if node in done:
            continue
        done.add(node)
        if node == goal:
            break
        for neighbor, attrs in graph.neighbors(node):
            if neighbor in done:
                continue
            new_cost = cost + attrs['weight']
            if new_cost < dist.get(neighbor, float('inf')):
                dist[neighbor] = new_cost
                parent[neighbor] = node
                heapq.heappush(queue, (new_cost, neighbor.y, neighbor.x))

    if goal not in done:
        raise Unreachable(f"No path from {tuple(start)} to {tuple(goal)}")

    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return Trajectory(tuple(path))
