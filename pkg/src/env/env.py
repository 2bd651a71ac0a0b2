import gymnasium as gym
import numpy as np

from .world import VERBS, Action, Violation, World, WorldState, transition


class MazeEnv(gym.Env):
    def __init__(self, world: World, max_steps: int | None = None):
        """Creates the key-door maze environment of a single task.

        ---
        Args:
            world: The rooms, doors, keys, and Bob's and Alice's positions.
            max_steps: Truncate the episode after this many actions.
                No truncation if None.
        """
        assert max_steps is None or max_steps > 0

        self.world = world
        self.max_steps = max_steps

        # Fixed orderings, used to encode the observations.
        self.key_ids = sorted(world.keys)
        self.door_edges = sorted(world.doors)

        self.observation_space = gym.spaces.Dict(
            {
                "room": gym.spaces.Discrete(world.maze.n * world.maze.m),
                # Padded so that worlds without keys or doors stay valid.
                "held_keys": gym.spaces.MultiBinary(max(len(self.key_ids), 1)),
                "opened_doors": gym.spaces.MultiBinary(max(len(self.door_edges), 1)),
            }
        )
        # A verb and its argument (room label, key id or "Alice").
        self.action_space = gym.spaces.Tuple(
            (
                gym.spaces.Discrete(len(VERBS)),
                gym.spaces.Text(max_length=16),
            )
        )

        self.state = WorldState.initial(world)

    def reset(
        self, *, seed: int | None = None, options: dict | None = None
    ) -> tuple[dict, dict]:
        """Place Bob back in his starting room.

        ---
        Returns:
            observation: The encoded state.
            infos: Additional infos.
        """
        super().reset(seed=seed)
        self.state = WorldState.initial(self.world)
        return self.observation, {"state": self.state, "violation": None}

    def step(self, action: Action) -> tuple[dict, float, bool, bool, dict]:
        """Apply the action, compute the reward and some contextual information
        and return them.

        ---
        Args:
            action: The action to apply.

        ---
        Returns:
            observation: The encoded state.
            reward: 1 when Alice gets rescued by this action, 0 otherwise.
            terminated: Whether Alice has been rescued.
            truncated: Whether the maximum number of steps is reached.
            infos: The new state and the violation, if any.
        """
        was_rescued = self.state.rescued
        self.state, violation = transition(self.world, self.state, action)

        reward = float(self.state.rescued and not was_rescued)
        terminated = self.state.rescued
        truncated = self.max_steps is not None and self.state.step >= self.max_steps

        infos = {"state": self.state, "violation": violation}
        return self.observation, reward, terminated, truncated, infos

    @property
    def observation(self) -> dict:
        room = self.state.current_room
        held_keys = np.zeros(self.observation_space["held_keys"].n, dtype=np.int8)
        opened_doors = np.zeros(self.observation_space["opened_doors"].n, dtype=np.int8)

        for index, key_id in enumerate(self.key_ids):
            held_keys[index] = key_id in self.state.held_keys
        for index, edge in enumerate(self.door_edges):
            opened_doors[index] = edge in self.state.opened_doors

        return {
            "room": room.column * self.world.maze.m + room.row - 1,
            "held_keys": held_keys,
            "opened_doors": opened_doors,
        }

    def rollout(self, actions: list[Action]) -> list[Violation]:
        """Play a whole action sequence from the start, return every violation."""
        self.reset()
        violations = []
        for action in actions:
            _, _, _, _, infos = self.step(action)
            if infos["violation"] is not None:
                violations.append(infos["violation"])
        return violations
