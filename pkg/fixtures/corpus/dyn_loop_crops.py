import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
tiles = []
for i in range(3):
    tiles.append(img.crop((i * 10, 0, i * 10 + 50, 50)))
