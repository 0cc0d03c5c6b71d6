"""Label vocabularies and the room-conditioned object placement table."""

TARGETS = (
    "alarm_clock", "apple", "baseball_bat", "basketball", "bowl", "garbage_can",
    "house_plant", "laptop", "mug", "spray_bottle", "television", "vase",
)

ROOMS = ("bedroom", "bathroom", "kitchen", "living_room", "office")

# relative placement weights per room; targets and context furniture share one table
PLACEMENT = {
    "bedroom": {"bed": 3, "nightstand": 2, "alarm_clock": 2, "baseball_bat": 1,
                "basketball": 1, "laptop": 1, "vase": 0.5},
    "bathroom": {"toilet": 3, "sink": 2, "bathtub": 2, "spray_bottle": 2, "garbage_can": 1},
    "kitchen": {"fridge": 3, "stove": 2, "dining_table": 2, "apple": 2, "bowl": 2,
                "mug": 1, "garbage_can": 1, "spray_bottle": 0.5},
    "living_room": {"sofa": 3, "coffee_table": 2, "armchair": 2, "television": 2,
                    "house_plant": 2, "vase": 1},
    "office": {"desk": 3, "chair": 3, "bookshelf": 2, "laptop": 2, "mug": 1,
               "house_plant": 1, "alarm_clock": 0.5},
}

OBJECTS = tuple(sorted({o for table in PLACEMENT.values() for o in table}))
