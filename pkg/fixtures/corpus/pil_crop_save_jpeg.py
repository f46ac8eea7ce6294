import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
img.crop((8, 8, 72, 72)).save("closeup.jpg")
